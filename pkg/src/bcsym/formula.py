"""Three-part model formulas and design matrix construction.

Grammar:

    formula := ident "~" part ("|" part ("|" part)?)?
    part    := "0" | "1" | term ("+" term)*
    term    := ident | "1"

The first part models the scale, the optional second the relative
dispersion (defaulting to an intercept), and the presence of a third
part switches on zero-adjusted fitting. An intercept is always included
unless a part is exactly "0" (which the design builder rejects for all
three submodels, since each needs at least one column).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError, FormulaSyntaxError, RankDeficiencyError

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")
INTERCEPT = "1"


@dataclass(frozen=True)
class FormulaAst:
    response: str
    mu_terms: tuple[str, ...]
    sigma_terms: tuple[str, ...]
    alpha_terms: tuple[str, ...] | None

    @property
    def zero_adjusted(self) -> bool:
        return self.alpha_terms is not None

    def covariates(self) -> list[str]:
        """All distinct covariate names referenced by any part."""
        seen: list[str] = []
        for part in (self.mu_terms, self.sigma_terms, self.alpha_terms or ()):
            for t in part:
                if t != INTERCEPT and t not in seen:
                    seen.append(t)
        return seen


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, char: str) -> bool:
        if self.peek() == char:
            self.pos += 1
            return True
        return False

    def ident(self) -> str:
        self.skip_ws()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            raise FormulaSyntaxError("expected an identifier", self.pos)
        self.pos = m.end()
        return m.group(0)


def _parse_part(cur: _Cursor) -> tuple[str, ...]:
    cur.skip_ws()
    if cur.peek() == "0":
        cur.pos += 1
        cur.skip_ws()
        if cur.peek() == "+":
            raise FormulaSyntaxError("'0' removes the intercept and must stand alone",
                                     cur.pos)
        return ()
    terms: list[str] = [INTERCEPT]
    while True:
        cur.skip_ws()
        if cur.peek() == "1":
            cur.pos += 1
            term = INTERCEPT
        else:
            term = cur.ident()
        if term != INTERCEPT:
            if term in terms:
                raise FormulaSyntaxError(f"duplicate term {term!r}", cur.pos - len(term))
            terms.append(term)
        if not cur.take("+"):
            break
    return tuple(terms)


def parse_formula(text: str) -> FormulaAst:
    """Parse ``response ~ mu-part | sigma-part | alpha-part``."""
    if not text or not text.strip():
        raise FormulaSyntaxError("empty formula", 0)
    cur = _Cursor(text)
    response = cur.ident()
    cur.skip_ws()
    if not cur.take("~"):
        raise FormulaSyntaxError("expected '~' after the response", cur.pos)
    parts = [_parse_part(cur)]
    while cur.take("|"):
        if len(parts) == 3:
            raise FormulaSyntaxError("a formula has at most three parts", cur.pos - 1)
        parts.append(_parse_part(cur))
    if not cur.at_end():
        raise FormulaSyntaxError("unexpected trailing input", cur.pos)
    mu_terms = parts[0]
    sigma_terms = parts[1] if len(parts) > 1 else (INTERCEPT,)
    alpha_terms = parts[2] if len(parts) > 2 else None
    return FormulaAst(response, mu_terms, sigma_terms, alpha_terms)


def unparse_formula(ast: FormulaAst) -> str:
    def part(terms: tuple[str, ...]) -> str:
        return " + ".join(terms) if terms else "0"

    out = f"{ast.response} ~ {part(ast.mu_terms)} | {part(ast.sigma_terms)}"
    if ast.alpha_terms is not None:
        out += f" | {part(ast.alpha_terms)}"
    return out


# ---------------------------------------------------------------------------
# Design matrices.
# ---------------------------------------------------------------------------

@dataclass
class DesignMatrices:
    """Regressor matrices for the scale (X), dispersion (S) and zero (Z) parts."""

    X: np.ndarray
    S: np.ndarray
    Z: np.ndarray | None
    x_names: list[str]
    s_names: list[str]
    z_names: list[str] | None

    @property
    def n(self) -> int:
        return self.X.shape[0]


def _encode_term(dataset: Dataset, term: str) -> tuple[list[str], np.ndarray]:
    col = dataset[term]
    if dataset.is_numeric(term):
        return [term], col[:, None]
    levels = sorted(set(col.tolist()))
    if len(levels) < 2:
        raise DataError(f"categorical column {term!r} needs at least 2 levels")
    # alphabetically first level is the reference
    cols = [(f"{term}:{lv}", (col == lv).astype(float)) for lv in levels[1:]]
    return [c[0] for c in cols], np.column_stack([c[1] for c in cols])


def _collinear_columns(mat: np.ndarray, names: list[str]) -> list[str]:
    """Greedy scan: columns that do not increase the rank of what precedes them."""
    bad = []
    kept = np.empty((mat.shape[0], 0))
    for j, name in enumerate(names):
        cand = np.column_stack([kept, mat[:, j]])
        if np.linalg.matrix_rank(cand) > kept.shape[1]:
            kept = cand
        else:
            bad.append(name)
    return bad


def _build_part(dataset: Dataset, terms: tuple[str, ...], part_name: str):
    if not terms:
        raise DataError(f"the {part_name} part needs at least an intercept "
                        "(a '0' part is not estimable)")
    names: list[str] = []
    blocks: list[np.ndarray] = []
    for term in terms:
        if term == INTERCEPT:
            names.append("intercept")
            blocks.append(np.ones((dataset.n, 1)))
        else:
            tn, tb = _encode_term(dataset, term)
            names.extend(tn)
            blocks.append(tb)
    mat = np.column_stack(blocks)
    if np.linalg.matrix_rank(mat) < mat.shape[1]:
        raise RankDeficiencyError(part_name, _collinear_columns(mat, names))
    return mat, names


def build_design(dataset: Dataset, ast: FormulaAst) -> DesignMatrices:
    """Dummy-encode and assemble X/S/Z; validates rank and dimension limits."""
    if ast.response not in dataset.columns:
        raise DataError(f"response column {ast.response!r} not found in the data")
    X, x_names = _build_part(dataset, ast.mu_terms, "scale (mu)")
    S, s_names = _build_part(dataset, ast.sigma_terms, "dispersion (sigma)")
    Z, z_names = (None, None)
    if ast.alpha_terms is not None:
        Z, z_names = _build_part(dataset, ast.alpha_terms, "zero-probability (alpha)")
    n = dataset.n
    p, q = X.shape[1], S.shape[1]
    m = Z.shape[1] if Z is not None else 0
    if m + p + q + 1 >= n:
        raise DataError(f"too few rows ({n}) for {m + p + q + 1} parameters")
    return DesignMatrices(X, S, Z, x_names, s_names, z_names)

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bcsym.dgf import DgfFamily

# one representative per family, moderate extra parameters
ALL_FAMILIES = [
    DgfFamily("BCNO"),
    DgfFamily("BCT", 4.0),
    DgfFamily("BCPE", 2.0),
    DgfFamily("BCLOI"),
    DgfFamily("BCLOII"),
    DgfFamily("BCHP", 1.2),
    DgfFamily("BCSL", 1.5),
    DgfFamily("BCSN", 2.0),
]


@pytest.fixture(params=ALL_FAMILIES, ids=lambda f: f.tag)
def family(request):
    return request.param

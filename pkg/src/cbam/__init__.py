"""Border carbon adjustment assessment engine.

Classifies goods by CN code, rolls embedded emissions up bills of
materials, prices certificate obligations against the EU ETS reference
price, and scans trade flows for substitution into downstream goods.
"""

from cbam.errors import CbamError
from cbam.taxonomy import AnnexList, CnCode, Sector, is_covered, parse_cn, sector_of

__version__ = "0.1.0"

__all__ = [
    "AnnexList",
    "CbamError",
    "CnCode",
    "Sector",
    "is_covered",
    "parse_cn",
    "sector_of",
]

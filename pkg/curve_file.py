import os
from typing import List, Optional

import pandas as pd

from curves import CurveRecord, curve_file_path, parse_curve_file

COLUMNS = ["label", "N", "ainvs", "rank", "torsion"]


class CurveFileProcessor:
    """Curve records of a JSON-lines file, grouped by conductor. A missing default file is empty; a missing explicit file is an error."""

    def __init__(self, curve_file: Optional[str] = None):
        self.path = curve_file or curve_file_path()
        if curve_file is None and not os.path.exists(self.path):
            self.records, self.errors = [], []
        else:
            self.records, self.errors = parse_curve_file(self.path)
        self.df = pd.DataFrame(
            [[r.label, r.conductor, list(r.ainvs), r.rank, r.torsion] for r in self.records],
            columns=COLUMNS,
        )

    def for_level(self, N: int) -> List[CurveRecord]:
        return [r for r in self.records if r.conductor == N]

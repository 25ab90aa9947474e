from __future__ import annotations

import sys
from pathlib import Path

# `diffeoreg` resolves from src/ and the shared fixtures as `tests.helpers`
ROOT = Path(__file__).resolve().parents[1]
for entry in (ROOT / "src", ROOT):
    if str(entry) not in sys.path:
        sys.path.insert(0, str(entry))

#!/usr/bin/env python3
"""
Launch script for NNPhD

Puts the project root on the Python path so ``src`` imports work no matter
where the command is run from, then hands over to the CLI.
"""

import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))

# Warn when a project venv exists but is not active
venv_path = project_root / 'venv'
in_venv = (
    hasattr(sys, 'real_prefix') or
    (hasattr(sys, 'base_prefix') and sys.base_prefix != sys.prefix)
)
if not in_venv and (venv_path / 'bin' / 'activate').exists():
    print("⚠️  Warning: Virtual environment exists but is not activated.", file=sys.stderr)
    print(f"   source {venv_path}/bin/activate", file=sys.stderr)

from src.main import main

if __name__ == '__main__':
    sys.exit(main())

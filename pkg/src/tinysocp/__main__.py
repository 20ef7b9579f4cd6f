"""Allow ``python -m tinysocp``."""

import sys

from .cli import main

sys.exit(main())

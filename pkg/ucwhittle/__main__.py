"""``python -m ucwhittle``."""
import sys

from ucwhittle.cli import main

sys.exit(main())

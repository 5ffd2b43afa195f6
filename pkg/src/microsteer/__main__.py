import sys

from .session.cli import main

sys.exit(main())

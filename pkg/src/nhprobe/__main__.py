import sys

from .probelab.cli import main

sys.exit(main())

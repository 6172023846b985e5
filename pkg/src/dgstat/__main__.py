import sys

from dgstat.cli import main

sys.exit(main())

import sys

from crlab.scripts.cli import main

sys.exit(main())

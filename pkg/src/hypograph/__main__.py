import sys

from hypograph.cli import main

sys.exit(main())

import sys

from prodsets.cli import main

sys.exit(main())

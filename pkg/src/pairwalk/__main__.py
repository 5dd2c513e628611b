import sys

from pairwalk.cli import main

sys.exit(main())

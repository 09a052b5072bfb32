import sys

from vam_gridworld.cli import main

sys.exit(main())

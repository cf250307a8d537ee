import sys

from evasion_sim.cli import main

sys.exit(main())

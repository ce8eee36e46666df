import sys

from patholab.cli import main

sys.exit(main())

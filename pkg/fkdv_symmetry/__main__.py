import sys

from fkdv_symmetry.cli import main

sys.exit(main())

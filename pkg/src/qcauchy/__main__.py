import sys

from qcauchy.cli.main import main

sys.exit(main())

import sys

from deepmso.cli import main

sys.exit(main())

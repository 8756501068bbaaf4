import sys

from critnodes.cli import main

sys.exit(main())

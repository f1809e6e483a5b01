import sys

from podkit.cli import main

sys.exit(main())

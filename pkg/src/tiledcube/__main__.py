import sys

from tiledcube.cli import main

sys.exit(main())

import sys

from chessruns.cli import main

sys.exit(main())

import sys

from kitaev_vqe.cli import main

sys.exit(main())

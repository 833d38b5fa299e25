import sys

from notional.main import main

sys.exit(main())

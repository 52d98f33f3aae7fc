import sys

from picheck.driver import main

sys.exit(main())

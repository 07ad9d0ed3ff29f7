import sys

from navier_cascade.main import main

sys.exit(main())

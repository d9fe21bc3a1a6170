# med_solve - root-level entry point
# Equivalent to the installed `med-lab` console script:
#   python med_solve.py solve data/ensembles/trine.json --json
import sys

from med_lab.med_cli import main

if __name__ == "__main__":
    sys.exit(main())

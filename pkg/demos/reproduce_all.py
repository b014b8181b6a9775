"""Run the bundled checks for all five worked examples and print the report.

    python3 demos/reproduce_all.py [OUT_DIR]
"""
import sys
import time

from unbounded_toeplitz import reproduce_example

out = sys.argv[1] if len(sys.argv) > 1 else None
failed = 0
for k in range(1, 6):
    t0 = time.perf_counter()
    rep = reproduce_example(k, out_dir=out)
    print(f"example {k} ({time.perf_counter() - t0:.2f} s)")
    for line in rep.lines():
        print("  " + line)
    failed += not rep.passed
sys.exit(1 if failed else 0)

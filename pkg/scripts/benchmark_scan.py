import argparse
import os
import sys
import time

parser = argparse.ArgumentParser()
parser.add_argument("--config", type=str, default=None, help="Run configuration (defaults to configs/grid.json)")
parser.add_argument("--formula", type=str, choices=["exact", "printed"], default=None)
parser.add_argument("--cycles", type=int, default=0, help="Also time a simulation of r* with this many cycles")
parser.add_argument("--workers", type=int, default=1, help="Worker processes for the simulation")
parser.add_argument("--warmup", type=int, default=1, help="Warmup runs (not timed)")
parser.add_argument("--runs", type=int, default=3, help="Timed runs for average")
args = parser.parse_args()

# Add path
current_dir = os.path.dirname(os.path.abspath(__file__))
root_dir = os.path.dirname(current_dir)
if root_dir not in sys.path:
    sys.path.insert(0, root_dir)

from regen_inventory import FormulaVariant, RunConfig, argmax, estimate, scan  # noqa: E402
from regen_inventory.core import kernels  # noqa: E402

config_path = args.config or os.path.join(root_dir, "configs", "grid.json")
config = RunConfig.from_json_file(config_path)
formula = FormulaVariant.parse(args.formula) if args.formula else config.formula
print(f"Config: {config_path} | levels: {len(config.model.levels)} | formula: {formula.value}")


def run_once(cold=True):
    # a cold run rebuilds every mixture table
    if cold:
        kernels._cached_table.cache_clear()
    return scan(config.model, config.costs, config.delay, config.tolerances, formula)


def report(label, times):
    avg = sum(times) / len(times)
    print(f"{label} Runs: {len(times)} | Avg: {avg:.4f}s | Min: {min(times):.4f}s | Max: {max(times):.4f}s")
    print("TIMES: " + ", ".join(f"{t:.4f}" for t in times))


for _ in range(max(0, args.warmup)):
    run_once()

for cold in (True, False):
    times = []
    for _ in range(max(1, args.runs)):
        t_start = time.perf_counter()
        table = run_once(cold)
        times.append(time.perf_counter() - t_start)
    report("scan (cold)" if cold else "scan (cached)", times)

best = argmax(table)
print(f"r* = {best.r_star} | I* = {best.I_star:.10g}")

if args.cycles > 0:
    times = []
    for run in range(max(1, args.runs)):
        t_start = time.perf_counter()
        sim = estimate(config.model, config.costs, config.delay, best.r_star, args.cycles, config.simulation.seed + run,
                       workers=args.workers, progress=False)
        times.append(time.perf_counter() - t_start)
    report(f"simulate ({args.cycles} cycles)", times)
    print(f"ratio = {sim.ratio.mean:.6f} +/- {sim.ratio.se:.6f}")

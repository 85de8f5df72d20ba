import sys
import time

from burgerskit import parse_config
from burgerskit.ensemble import Member, run_ensemble
from burgerskit.runner import simulate_member

N_MEMBERS = 8
OVERRIDES = ["model.N=128", "solver.dt=0.001", "solver.t_end=1", "solver.diag_every=100"]


def bench_schemes() -> None:
    for form in ("primal", "integrated_adopted", "colehopf"):
        for scheme in ("ifrk4", "imex_cnab2"):
            cfg = parse_config("", OVERRIDES + [f"model.form={form}", f"solver.scheme={scheme}"])
            now = time.time()
            simulate_member(cfg, seed=0)
            print(f"{form} {scheme} {cfg.solver_config().n_steps} steps {time.time() - now}")


def bench_ensemble() -> None:
    cfg = parse_config("", OVERRIDES)
    for workers in (1, 2, 4, 8):
        members = [Member(f"m{i:03d}", {"cfg": cfg, "seed": i}) for i in range(N_MEMBERS)]
        now = time.time()
        run_ensemble(simulate_member, members, concurrency=workers)
        print(f"ensemble {N_MEMBERS} members, {workers} workers {time.time() - now}")


def main() -> None:
    target = sys.argv[1] if len(sys.argv) > 1 else "schemes"

    if target == "ensemble":
        bench_ensemble()
    else:
        bench_schemes()


if __name__ == "__main__":
    main()

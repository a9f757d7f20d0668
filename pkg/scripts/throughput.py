"""Time assess_batch on a synthetic desk-scale workload.

    python scripts/throughput.py --decls 100000 --goods 1000
"""

import argparse
import datetime as dt
import random
import time

from cbam.pricing import AssessmentContext, ImportDeclaration, assess_batch
from cbam.registry import CarbonPriceTable, IntensityDefaults, load_registry
from cbam.report import RunReport, render_json
from cbam.taxonomy import Sector

CODES = ["7305", "72081000", "76070000", "25232100", "28141000", "94032000", "48010000"]


def synthetic_registry(rng, n):
    goods = []
    for i in range(n):
        later = list(range(i + 1, n))
        k = rng.randint(0, min(3, len(later)))
        goods.append({
            "id": f"g{i}",
            "cn_code": rng.choice(CODES),
            "direct_intensity": rng.uniform(0, 5),
            "inputs": [{"id": f"g{j}", "qty": rng.uniform(0, 3)} for j in rng.sample(later, k)],
        })
    return load_registry({"goods": goods})


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--decls", type=int, default=100_000)
    ap.add_argument("--goods", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    reg = synthetic_registry(rng, args.goods)
    ids = list(reg.goods)
    decls = [
        ImportDeclaration(
            id=f"D{i}",
            date=dt.date(rng.randint(2023, 2037), rng.randint(1, 12), 1),
            origin=rng.choice(["RU", "CN", "TR", "IN", "US", "NO"]),
            good=rng.choice(ids),
            quantity=rng.uniform(0, 5000),
        )
        for i in range(args.decls)
    ]
    ctx = AssessmentContext(
        registry=reg,
        prices=CarbonPriceTable.from_rows([("EU", dt.date(2022, 1, 1), 80.0)]),
        defaults=IntensityDefaults.from_rows([("*", s, 1.0) for s in Sector]),
    )
    t0 = time.perf_counter()
    batch = assess_batch(decls, ctx)
    t1 = time.perf_counter()
    out = render_json(RunReport.from_batch(batch))
    t2 = time.perf_counter()
    print(f"assessed {len(batch.obligations)} rows ({len(batch.errors)} errors) in {t1 - t0:.3f}s")
    print(f"rendered {len(out) / 1e6:.1f} MB of JSON in {t2 - t1:.3f}s")


if __name__ == "__main__":
    main()

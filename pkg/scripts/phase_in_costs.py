"""Cost of importing 1,000 t of steel per year under the phase-in schedule,
for a few origins and foreign carbon prices."""

import datetime as dt

from cbam.pricing import AssessmentContext, ImportDeclaration, assess
from cbam.registry import CarbonPriceTable

prices = CarbonPriceTable.from_rows([
    ("EU", dt.date(2022, 1, 1), 80.0),
    ("CN", dt.date(2022, 1, 1), 35.0),
])
ctx = AssessmentContext(prices=prices)

print(f"{'year':>4}  {'phase':>5}  {'RU (no scheme)':>15}  {'CN (35 EUR)':>12}  {'NO (EFTA)':>10}")
for year in range(2023, 2037):
    costs = []
    for origin in ("RU", "CN", "NO"):
        ob = assess(ImportDeclaration(f"{origin}{year}", dt.date(year, 6, 30), origin, "72081000", 1000.0), ctx)
        costs.append(ob.cost)
    print(f"{year:>4}  {ob.phase_factor:>5.2f}  {costs[0]:>15,.2f}  {costs[1]:>12,.2f}  {costs[2]:>10,.2f}")

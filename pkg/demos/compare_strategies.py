"""Compare mutant selection strategies over the bundled corpus.

The selector is cross-validated by project, so every subject's ``aims``
selection comes from a model that never saw it. With the default configuration
this takes about ten minutes on one core. Smaller selectors are faster but
learn much less (a 64-unit, 5-epoch selector lands near MCC 0.08).
"""
from aimsel.harness import ExperimentConfig, analyze_project, benchmark, bundled_path

cfg = ExperimentConfig()

arts = analyze_project(bundled_path("corpus"), cfg)
print(f"{len(arts)} subjects, {sum(len(a.mutant_ids) for a in arts)} mutants")

res = benchmark(arts, cfg)
p, r, mcc = res.xval.metrics
print(f"selector (pooled over folds): precision {p:.3f} recall {r:.3f} mcc {mcc:.3f}")

print(f"{'strategy':<14}{'selected':>9}{'executions':>12}{'median inferred':>17}")
for row in res.summary_rows():
    print(f"{row['strategy']:<14}{row['selected']:>9}{row['executions']:>12}"
          f"{float(row['median_inferred_fraction']):>17.3f}")

w = res.wilcoxon
print(f"aims vs random: Wilcoxon p = {w.p_value:.4g} ({w.method})")
print(f"executions, all / aims: {res.cost_ratio('aims'):.2f}")

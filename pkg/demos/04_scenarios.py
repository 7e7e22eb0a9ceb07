"""Compare grid-only, EV, solar and optimised-battery days."""

from gridbatt import BatteryParams, SwarmConfig, ieee33, improvement_report, normalized_weights, run_all_scenarios, synthetic_profiles
from gridbatt.scenarios import reference_values

net = ieee33()
prof = synthetic_profiles(net)

# Costs are scaled so the grid-only day costs w1 + w2 = 1
weights = normalized_weights(net, prof)
runs = run_all_scenarios(net, prof, BatteryParams(), weights, alpha=0.7, beta=0.3,
                         swarm=SwarmConfig(particles=20, iterations=50))

ref = reference_values()
print(f"{'scenario':<15}{'loss kW':>10}{'dev %':>8}{'cost':>9}   reference loss / dev")
for name, r in runs.items():
    bd, t = r.breakdown, ref["scenarios"][name]
    print(f"{name:<15}{bd.p_loss_total_kw:>10.1f}{bd.avg_v_dev_pct:>8.2f}{bd.cost:>9.4f}   "
          f"{t['p_loss_kw']} / {t['avg_v_dev_pct']}")

baselines = {n: r.breakdown for n, r in runs.items() if n != "proposed"}
for imp in improvement_report(baselines, runs["proposed"].breakdown):
    print(f"vs {imp.baseline}: loss -{imp.loss_pct:.1f}%, deviation -{imp.dev_pct:.1f}%, cost -{imp.cost_pct:.1f}%")

# End-of-branch voltages in the optimised case
for bus, v in runs["proposed"].voltages.items():
    print(f"bus {bus}: min {v.min():.4f}, max {v.max():.4f} p.u.")

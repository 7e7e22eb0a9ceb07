"""Daily load composition and battery bookkeeping."""

import numpy as np

from gridbatt import BatteryParams, DispatchSchedule, EvProfileParams, MixConfig, ieee33, simulate_schedule, synthetic_profiles
from gridbatt.battery import sector_power_caps
from gridbatt.profiles import compose_injections

net = ieee33()

# Synthetic day: flat residential load, evening EV arrivals, 2 kW per-home solar peak
prof = synthetic_profiles(net, residential="flat", ev=EvProfileParams(vehicles_per_bus=9, seed=0))
print("EV energy per bus (kWh):", prof.p_ev[1:].sum(axis=1)[:5])
print("per-home solar (kW):", np.round(prof.p_solar_unit, 2))

# 70% of the 92 homes at each bus export solar, the rest hold batteries
mix = MixConfig.for_alpha(net, 0.7)
print("homes at bus 18 (solar-only, battery):", mix.counts_for(18))

p, _ = compose_injections(net, prof, mix)
print("feeder net demand by hour (kW):", np.round(p.sum(axis=0)).astype(int))

# 30% of each battery home's 10 kWh / 5 kW is dispatchable
params = BatteryParams(beta=0.3)
caps = sector_power_caps(net, net.sectors, mix, params)
print("sector power limits (kW per bus):", caps)

# Charge at midday, discharge in the evening
sched = np.zeros((7, 24))
sched[:, 10:14] = 8.0
sched[:, 18:22] = -8.0
traj = simulate_schedule(net, net.sectors, mix, params, DispatchSchedule(sched))
print("SOC at bus 18 (%):", np.round(traj.soc_pct[net.index[18]], 1))
print("penalty (kWh over bounds):", traj.penalty)

# Push too hard and the overshoot is clipped and counted
sched[:, 10:14] = 40.0
print("penalty when over-commanded:", simulate_schedule(net, net.sectors, mix, params, DispatchSchedule(sched)).penalty)

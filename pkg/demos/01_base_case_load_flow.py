"""Base-case load flow on the bundled 33-bus feeder."""

import numpy as np

from gridbatt import BusInjection, check_ampacity, check_voltage_band, ieee33, solve, to_per_unit

net = ieee33(base_kv=11.0)
print(net.n_buses, "buses,", net.n_lines, "lines, total load",
      net.p_load_kw.sum(), "kW /", net.q_load_kvar.sum(), "kVAR")

# Impedances in per unit on an 11 kV / 1 MVA base
pu = to_per_unit(net)
print("Z_base =", round(net.z_base_ohm, 3), "ohm; first line r, x =", pu.r_pu[0], pu.x_pu[0])

sol = solve(net)
print(f"losses: {sol.p_loss_kw:.2f} kW, {sol.q_loss_kvar:.2f} kVAR after {sol.iterations} sweeps")
print(f"slack supplies {sol.p_slack_kw:.2f} kW = load + loss")

# Voltage profile along the main trunk
trunk = [net.index[b] for b in range(1, 19)]
print("trunk voltages:", np.round(sol.v_pu[trunk], 4))

viol = check_voltage_band(sol, band=0.10)
print(len(viol), "buses outside +/-10%:", [v.bus for v in viol])
print("ampacity violations:", check_ampacity(net, sol))

# Same feeder on its usual 12.66 kV base stays inside the band
sol12 = solve(ieee33(base_kv=12.66))
print(f"12.66 kV: {sol12.p_loss_kw:.2f} kW loss, minimum {sol12.v_pu.min():.4f} p.u.")

# Halving every load roughly quarters the loss
half = BusInjection({b: p / 2 for b, p in zip(net.bus_ids, net.p_load_kw)},
                    {b: q / 2 for b, q in zip(net.bus_ids, net.q_load_kvar)})
print("half load loss ratio:", round(solve(net, half).p_loss_kw / sol.p_loss_kw, 3))

"""A coarse alpha/beta sweep, run in parallel across processes."""

from concurrent.futures import ProcessPoolExecutor

from gridbatt import BatteryParams, SwarmConfig, ieee33, normalized_weights, sweep_alpha_beta, synthetic_profiles

if __name__ == "__main__":
    net = ieee33()
    prof = synthetic_profiles(net)
    weights = normalized_weights(net, prof)

    alphas = [0.0, 0.3, 0.5, 0.7, 0.9]
    betas = [0.0, 0.15, 0.3]
    with ProcessPoolExecutor() as pool:
        result = sweep_alpha_beta(alphas, betas, net, prof, BatteryParams(), weights,
                                  SwarmConfig(particles=20, iterations=50), map_fn=pool.map)

    # Same table format the CLI writes to sweep.csv
    print(result.to_csv())
    print("lowest cost at alpha, beta =", result.argmin)

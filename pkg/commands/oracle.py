import logging

import numpy as np
import pandas as pd

from flow.sphere_oracle import SphereTrajectory, smallness_constants, sphere_energy, theorem_bound
from utils.errors import OracleError

logger = logging.getLogger(__name__)


def oracle_table(rho0, lambda1, lambda2, points=11):
    """ρ(t), area and energy on an even grid over [0, T), plus T and the theorem bound."""
    trajectory = SphereTrajectory(rho0, lambda1, lambda2)
    T = trajectory.extinction_time
    bound = theorem_bound(sphere_energy(rho0, lambda1, lambda2), lambda1)
    times = np.linspace(0.0, T, points, endpoint=False)
    table = pd.DataFrame({
        "t": times,
        "rho": trajectory.radius(times),
        "area": trajectory.area(times),
        "energy": trajectory.energy(times),
    })
    return table, T, bound


def run(args):
    """oracle --rho0 R --lambda1 A --lambda2 B [--points N]"""
    try:
        if not args.lambda1 > 0:
            raise OracleError(f"the oracle table needs lambda1 > 0, got {args.lambda1}")
        if args.points < 1:
            raise OracleError(f"--points must be >= 1, got {args.points}")
        table, T, bound = oracle_table(args.rho0, args.lambda1, args.lambda2, args.points)
        constants = smallness_constants(args.lambda1, args.lambda2)
    except OracleError as e:
        logger.error("❌ %s", e)
        return 1

    print(table.to_string(index=False, float_format=lambda x: f"{x:.8g}"))
    print(f"\nT = {T:.10g}")
    print(f"theorem bound = {bound:.10g}  ({'T < bound ✅' if T < bound else 'T >= bound ❌'})")
    cap = constants["lambda2_cap"]
    print(f"C_S = {constants['C_S']:.6g}, lambda2 cap = {'n/a' if cap is None else f'{cap:.6g}'}")
    return 0

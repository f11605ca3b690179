"""The two benchmark environments and their non-stationarity protocols.

Cart-pole gets a periodic lateral wind force A*cos(omega*t); the sled gets
an abrupt mid-episode friction jump. Both are deterministic given (config,
seed, actions), which is what makes every experiment in this package
byte-for-byte reproducible.
"""

import numpy as np

from esnrl.envs import (
    CartPoleWind,
    CartPoleWindConfig,
    FrictionSled,
    FrictionSledConfig,
    effective_friction,
    sled_terminal_velocity,
    wind_force,
    write_trajectory_csv,
)
from esnrl.numerics import make_rng

print("cart-pole with wind")
cfg = CartPoleWindConfig(wind_amplitude=5.0, wind_omega=0.05)
env = CartPoleWind(cfg)
s = env.reset(make_rng(0))
print(f"  reset state: {np.round(s, 3)}")
print(f"  wind at t=0: {wind_force(cfg, 0):+.2f} N, at half period: {wind_force(cfg, np.pi / cfg.wind_omega):+.2f} N")
transitions = []
while True:
    tr = env.step(np.array([0.0]))  # no control: the pole falls, wind pushes the cart
    transitions.append(tr)
    if tr.done or tr.truncated:
        break
print(f"  uncontrolled episode lasted {len(transitions)} steps")
write_trajectory_csv("cartpole_uncontrolled.csv", transitions)
print("  wrote cartpole_uncontrolled.csv")

print()
print("friction sled with a 10x friction jump at step 500")
sled_cfg = FrictionSledConfig(friction_multiplier=10.0, switch_step=500)
sled = FrictionSled(sled_cfg)
sled.reset(make_rng(1))
speeds = []
for t in range(1000):
    tr = sled.step(np.array([1.0]))
    speeds.append(tr.s_next[0])
print(f"  friction coefficient before/after switch: {effective_friction(sled_cfg, 499):.2f} / {effective_friction(sled_cfg, 500):.2f}")
print(f"  speed at t=499: {speeds[499]:.2f} m/s (closed form {sled_terminal_velocity(sled_cfg, 1.0, multiplier=1.0):.2f})")
print(f"  speed at t=999: {speeds[999]:.2f} m/s (closed form {sled_terminal_velocity(sled_cfg, 1.0):.2f})")
print("  full drive no longer reaches the old cruise speed: the controller")
print("  has to rebalance drive against a surface it has never seen.")

"""When can an attacker hide from every neighbor?

A nonzero globally stealthy attack needs the attack-driven state to stay in the
kernel of every outgoing coupling block. The largest such subspace that the
attacked input can keep invariant decides the question.
"""

import numpy as np
from scipy.signal import place_poles

from hierdetect import attack, model

k = np.array([[-0.284, -2.1]])
lss = model.example_model()
exists, basis = attack.globally_stealthy_existence(lss, 0, k)
print("example chain, single input on the velocity state:", "possible" if exists else "impossible")

# Give the attacked subsystem a second actuator. The coupling only reads the
# first state, and now the second state can be driven on its own.
a = np.array(model.EXAMPLE_A_II)
b = np.eye(2)
gain = -place_poles(a, b, [0.5, 0.6]).gain_matrix
coupling = np.array(model.EXAMPLE_A_IJ)
s0 = model.SubsystemModel(a, b, [[1.0, 0.0]], [[-1.0]], {1: coupling})
s1 = model.SubsystemModel(a, model.EXAMPLE_B_I, [[1.0, 0.0]], [[-1.0]], {0: coupling})
pair = model.LssModel((s0, s1))
exists, basis = attack.globally_stealthy_existence(pair, 0, gain)
print("two-input variant:", "possible" if exists else "impossible", "| basis:", basis.ravel().round(3))

# Steer the attack-driven state inside that subspace and watch what the
# neighbor sees through the coupling.
a_cl = a + b @ gain
dx = np.zeros(2)
seen = []
for step in range(30):
    u = attack.confined_input(basis, a_cl, b, dx, [0.0, np.sin(0.3 * step)])
    dx = a_cl @ dx + b @ u
    seen.append(np.abs(coupling @ dx).max())
print(f"largest deviation of the attacked state: {np.abs(dx).max():.3f}")
print(f"largest coupling change seen by the neighbor: {max(seen):.1e}")

# Optimal lookup-table control of a sampled harmonic oscillator, against LQR.
import time

import numpy as np

from cellmap import (CellSpace, CostSpec, DiscreteLTI, QuantizedLoop, QuantizerSpec, VectorQuantizerSpec,
                     control_lattice, discretize_zoh, harmonic_oscillator, lqr_gain, playback, resolve_target, simulate,
                     synthesize_doc, terminal_amplitude)

osc = harmonic_oscillator()
Ad, Bd = discretize_zoh(osc.Ac, osc.Bc, 0.1)
print("Ad =\n", Ad.round(4), "\nBd =", Bd.ravel().round(4))
plant = DiscreteLTI(Ad, Bd, 0.1)
K = lqr_gain(Ad, Bd, np.diag([1.0, 0.0]), [[1.0]])
print("u = -K x with K =", K.ravel().round(4))

cells = CellSpace.from_bits([(-1, 1, 8), (-1, 1, 8)])
U = control_lattice(4, -1, 1)
t0 = time.perf_counter()
doc = synthesize_doc(plant, cells, U, CostSpec(), resolve_target("origin", cells))
print(f"DOC: {doc.count} controllable of {cells.total} ({time.perf_counter() - t0:.1f} s)")

x0 = [0.5, 0.5]
run = playback(doc, plant, x0)
print(f"DOC playback: cost {run.cost:.3f}, {run.steps} steps")

ideal = simulate(QuantizedLoop(plant, K), x0, 2000, CostSpec())
print(f"ideal LQR: cost {ideal.total_cost:.3f} (x1^2 part {np.sum(ideal.states[:-1, 0] ** 2):.3f})")

ad = VectorQuantizerSpec.from_word_lengths([8, 8], [(-1, 1), (-1, 1)])
da = QuantizerSpec.from_word_length(4, -1, 1)
rough = simulate(QuantizedLoop(plant, K, ad, da), x0, 2000, CostSpec())
# the 4-bit actuator cannot resolve the small corrections near the origin
print(f"quantized LQR: terminal amplitude {terminal_amplitude(rough):.4f}")

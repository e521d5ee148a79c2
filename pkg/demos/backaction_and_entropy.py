"""What a qubit measurement does to the cavity, and how much a cat code can store.

Run with ``python3 demos/backaction_and_entropy.py``.
"""
import math

import numpy as np

from bellcat import hilbert as hs
from bellcat import logical as lg
from bellcat import protocol as pr

beta = math.sqrt(3)
psi = pr.prepare_bell_cat(beta)

# Measuring the qubit along X leaves the cavity in an even or odd cat.
for outcome in (1, -1):
    p, post = pr.project_qubit(psi, "X", outcome)
    cav = pr.cavity_part(post, "X", outcome)
    parity = hs.expectation(cav, hs.parity_op(cav.size)).real
    print(f"X = {outcome:+d} with probability {p:.3f}; cavity parity {parity:+.4f}")

# A state entangled with a single Fock level: the Z = -1 outcome is |3> exactly.
fock = pr.prepare_fock_entangled(beta, 3)
p, post = pr.project_qubit(fock, "Z", -1)
cav = pr.cavity_part(post, "Z", -1)
print(f"Z = -1 with probability {p:.3f}; photon-number distribution "
      f"{np.round(abs(cav[:6]) ** 2, 6)}")

# The code space only becomes a full qubit once the coherent states separate.
for b in (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0):
    print(f"beta={b:4.2f}  max entropy {lg.encoded_entropy(b):.4f} bits")

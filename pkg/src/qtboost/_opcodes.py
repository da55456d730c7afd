"""Opcode constants for flattened circuit programs.

A program is three parallel int32 arrays (kinds, qubits, args):

* rotation ops (RZ/RY/RX): ``qubits`` = acted qubit, ``args`` = index into
  the parameter vector;
* CNOT: ``qubits`` = control, ``args`` = target;
* CHANNEL: ``qubits`` = acted qubit, ``args`` unused (-1); the Kraus stack
  is passed to the kernel separately.

Qubit 0 is the most significant bit of the basis-state index.
"""

RZ = 0
RY = 1
RX = 2
CNOT = 3
CHANNEL = 4

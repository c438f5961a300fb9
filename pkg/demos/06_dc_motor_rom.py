# Minimum-time DOC for a DC motor, burned into a 64K x 8 ROM image.
from pathlib import Path

import numpy as np

from cellmap import (CellSpace, CostKind, CostSpec, RomLayout, SampledODE, control_lattice, dc_motor,
                     playback, read_rom, synthesize_doc, write_rom, write_trace)

out = Path("demo_out/dc_motor")
out.mkdir(parents=True, exist_ok=True)

plant = SampledODE(dc_motor(0.283, 0.906), 0.01, 4)
cells = CellSpace.from_bits([(-2.5, 2.5, 8), (-17, 17, 8)])
U = control_lattice(4, -25, 25)
doc = synthesize_doc(plant, cells, U, CostSpec(CostKind.MINIMUM_TIME, 0.01), [cells.nearest_cell()])
print("controllable cells:", doc.count)

run = playback(doc, plant, [2.0, 9.0], max_steps=1000)
print(f"from (2, 9): reached={run.reached} after {run.steps} samples")
write_trace(out / "trace.csv", run.states, run.controls)

layout = RomLayout.preset("hw-x1-low", cells)
rom, manifest = write_rom(out / "motor.rom", doc, layout)
back, *_ = read_rom(rom)
print(f"{rom.stat().st_size} byte image, roundtrip ok: {np.array_equal(back, doc.control_index)}")
print("manifest:", manifest)

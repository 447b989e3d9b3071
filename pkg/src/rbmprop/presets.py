"""Canned parameter vectors."""
import numpy as np

from .core import ModelShape, ThetaVector

# 4x4 test case, +/-1 coding; interaction rows are visibles, columns hiddens.
TABLE1_VISIBLE_MAIN = (-1.104376, -0.2630044, 0.3411915, -0.2583769)
TABLE1_HIDDEN_MAIN = (-0.1939302, -0.0572858, -0.2101802, 0.2402456)
TABLE1_INTERACTION = (
    (-0.0006334, -0.0021401, 0.0047799, 0.0025282),
    (0.0012975, 0.0000253, -0.0004352, -0.0086621),
    (-0.0038301, 0.0032237, 0.0020681, 0.0041429),
    (0.0089533, -0.0042403, -0.000048, 0.0004767),
)


def table1_shape() -> ModelShape:
    return ModelShape(4, 4)


def table1_theta() -> ThetaVector:
    return ThetaVector(table1_shape(), np.array(TABLE1_VISIBLE_MAIN),
                       np.array(TABLE1_HIDDEN_MAIN),
                       np.array(TABLE1_INTERACTION))


def table1_labelled() -> list[tuple[str, float]]:
    """Parameter names and values in the order they are tabulated."""
    rows = [(f"theta_v{i + 1}", x) for i, x in enumerate(TABLE1_VISIBLE_MAIN)]
    rows += [(f"theta_h{j + 1}", x) for j, x in enumerate(TABLE1_HIDDEN_MAIN)]
    rows += [(f"theta_{i + 1}{j + 1}", x)
             for i, row in enumerate(TABLE1_INTERACTION)
             for j, x in enumerate(row)]
    return rows

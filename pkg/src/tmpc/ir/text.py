"""Human-readable listing of HLIL/LLIL graphs in the statement syntax used by the compiler docs."""

from __future__ import annotations

from .graph import _Graph

_NAMES = {"Add": "MatAdd"}


def to_text(g: _Graph) -> str:
    """Render one statement per line.

    ScaleDown is an in-place statement on its operand, so later references to
    the ScaleDown node print the operand's name.
    """
    alias: dict[str, str] = {}
    lines = []
    for n in g.nodes:
        if n.op in ("Input", "Const"):
            continue
        args = [alias.get(i, i) for i in n.inputs]
        if n.op == "ScaleDown":
            alias[n.id] = args[0]
            lines.append(f"ScaleDown({args[0]}, {n.attrs['amount']});")
            continue
        extra = [f"{k}={v}" for k, v in sorted(n.attrs.items())]
        call = f"{_NAMES.get(n.op, n.op)}({', '.join(args + extra)})"
        if n.id == g.output_id:
            lines.append(f"output({call});")
        else:
            lines.append(f"{n.id} = {call};")
    return "\n".join(lines)

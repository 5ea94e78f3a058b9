#!/usr/bin/env python3
"""Writes the gate-level designs under corpus/<family>/netlist/.

Each family gets two widths of a hand-structured primitive-gate circuit.
Flip-flops are instances of a local `dff_cell` module, the way a cell
library would provide them. Rerun after editing; output is deterministic.
"""

import pathlib

ROOT = pathlib.Path(__file__).resolve().parent

DFF = """module dff_cell(input clk, input d, output reg q);
  always @(posedge clk)
    q <= d;
endmodule
"""


class Netlist:
    def __init__(self, name):
        self.name = name
        self.ports = []
        self.wires = []
        self.cells = []
        self.counter = 0
        self.seq = False

    def port(self, direction, name, width=1):
        rng = f"[{width - 1}:0] " if width > 1 else ""
        self.ports.append(f"{direction} {rng}{name}")

    def wire(self, prefix="n"):
        self.counter += 1
        w = f"{prefix}{self.counter}"
        self.wires.append(w)
        return w

    def gate(self, kind, *inputs, out=None):
        o = out if out is not None else self.wire()
        self.cells.append(f"{kind} g{len(self.cells)}({o}, {', '.join(inputs)});")
        return o

    def dff(self, d, q, clk="clk"):
        self.seq = True
        self.cells.append(f"dff_cell r{len(self.cells)}(.clk({clk}), .d({d}), .q({q}));")

    def mux(self, s, a, b, out=None):
        """s ? b : a"""
        ns = self.gate("not", s)
        t0 = self.gate("and", a, ns)
        t1 = self.gate("and", b, s)
        return self.gate("or", t0, t1, out=out)

    def full_add(self, a, b, c, s_out=None):
        p = self.gate("xor", a, b)
        s = self.gate("xor", p, c, out=s_out)
        g = self.gate("and", a, b)
        t = self.gate("and", p, c)
        return s, self.gate("or", g, t)

    def text(self, header):
        lines = [f"// {header}"]
        if self.seq:
            lines.append(DFF)
        lines.append(f"module {self.name}(")
        lines.append(",\n".join(f"  {p}" for p in self.ports))
        lines.append(");")
        for i in range(0, len(self.wires), 12):
            lines.append("  wire " + ", ".join(self.wires[i:i + 12]) + ";")
        lines.extend("  " + c for c in self.cells)
        lines.append("endmodule")
        return "\n".join(lines) + "\n"


def adder(n):
    m = Netlist(f"rca{n}_netlist")
    m.port("input", "a", n)
    m.port("input", "b", n)
    m.port("input", "ci")
    m.port("output", "s", n)
    m.port("output", "co")
    c = "ci"
    for i in range(n):
        _, c = m.full_add(f"a[{i}]", f"b[{i}]", c, s_out=f"s[{i}]")
    m.gate("buf", c, out="co")
    return m.text(f"{n}-bit ripple-carry adder, primitive gates")


def comparator(n):
    m = Netlist(f"cmp{n}_netlist")
    m.port("input", "a", n)
    m.port("input", "b", n)
    m.port("output", "eq")
    m.port("output", "lt")
    m.port("output", "gt")
    eq = None
    lt = None
    for i in reversed(range(n)):
        e = m.gate("xnor", f"a[{i}]", f"b[{i}]")
        nb = m.gate("not", f"a[{i}]")
        l = m.gate("and", nb, f"b[{i}]")
        if eq is None:
            eq, lt = e, l
        else:
            lt = m.gate("or", lt, m.gate("and", eq, l))
            eq = m.gate("and", eq, e)
    m.gate("buf", eq, out="eq")
    m.gate("buf", lt, out="lt")
    m.gate("nor", eq, lt, out="gt")
    return m.text(f"{n}-bit magnitude comparator, MSB-first chain")


def shifter(n, stages):
    m = Netlist(f"lsh{n}_netlist")
    m.port("input", "d", n)
    m.port("input", "k", stages)
    m.port("output", "q", n)
    cur = [f"d[{i}]" for i in range(n)]
    zero = m.gate("xor", "d[0]", "d[0]")
    for s in range(stages):
        amt = 1 << s
        nxt = []
        for i in range(n):
            src = cur[i - amt] if i >= amt else zero
            out = f"q[{i}]" if s == stages - 1 else None
            nxt.append(m.mux(f"k[{s}]", cur[i], src, out=out))
        cur = nxt
    return m.text(f"{n}-bit logarithmic left shifter")


def counter(n):
    m = Netlist(f"cnt{n}_netlist")
    m.port("input", "clk")
    m.port("input", "rst")
    m.port("input", "en")
    m.port("output", "q", n)
    m.port("output", "tc")
    nrst = m.gate("not", "rst")
    carry = "en"
    for i in range(n):
        t = m.gate("xor", f"q[{i}]", carry)
        d = m.gate("and", t, nrst)
        m.dff(d, f"q[{i}]")
        carry = m.gate("and", carry, f"q[{i}]")
    m.gate("buf", carry, out="tc")
    return m.text(f"{n}-bit synchronous up counter with enable and reset")


def alu(n):
    m = Netlist(f"alu{n}_netlist")
    m.port("input", "a", n)
    m.port("input", "b", n)
    m.port("input", "op", 2)
    m.port("output", "y", n)
    m.port("output", "cout")
    c = m.gate("and", "op[0]", "op[1]")  # carry-in 1 selects subtract
    for i in range(n):
        bi = m.gate("xor", f"b[{i}]", c if i == 0 else "op[1]")
        s, c = m.full_add(f"a[{i}]", bi, c)
        a_and = m.gate("and", f"a[{i}]", f"b[{i}]")
        a_or = m.gate("or", f"a[{i}]", f"b[{i}]")
        lo = m.mux("op[0]", a_and, a_or)
        m.mux("op[1]", lo, s, out=f"y[{i}]")
    m.gate("buf", c, out="cout")
    return m.text(f"{n}-bit ALU: and, or, add, subtract")


def fifo(width):
    m = Netlist(f"fifo2x{width}_netlist")
    m.port("input", "clk")
    m.port("input", "rst")
    m.port("input", "wr")
    m.port("input", "rd")
    m.port("input", "din", width)
    m.port("output", "dout", width)
    m.port("output", "full")
    m.port("output", "empty")
    nrst = m.gate("not", "rst")
    wp, rp, v0, v1 = (m.wire("st") for _ in range(4))
    nfull = m.gate("not", "full")
    nempty = m.gate("not", "empty")
    dw = m.gate("and", "wr", nfull)
    dr = m.gate("and", "rd", nempty)
    nwp = m.gate("not", wp)
    we0 = m.gate("and", dw, nwp)
    we1 = m.gate("and", dw, wp)
    for i in range(width):
        for slot, we in (("a", we0), ("b", we1)):
            q = m.wire(f"m{slot}")
            m.dff(m.mux(we, q, f"din[{i}]"), q)
            if slot == "a":
                qa = q
            else:
                qb = q
        m.mux(rp, qa, qb, out=f"dout[{i}]")
    m.dff(m.gate("and", m.gate("xor", wp, dw), nrst), wp)
    m.dff(m.gate("and", m.gate("xor", rp, dr), nrst), rp)
    # slot valid bits
    nrp = m.gate("not", rp)
    set0 = we0
    clr0 = m.gate("and", dr, nrp)
    set1 = we1
    clr1 = m.gate("and", dr, rp)
    for v, st, cl in ((v0, set0, clr0), (v1, set1, clr1)):
        keep = m.gate("and", v, m.gate("not", cl))
        m.dff(m.gate("and", m.gate("or", keep, st), nrst), v)
    m.gate("and", v0, v1, out="full")
    m.gate("nor", v0, v1, out="empty")
    return m.text(f"two-entry FIFO, {width} bits wide")


def uart_tx(bits):
    m = Netlist(f"txshift{bits}_netlist")
    m.port("input", "clk")
    m.port("input", "load")
    m.port("input", "tick")
    m.port("input", "data", bits)
    m.port("output", "txd")
    regs = [m.wire("sr") for _ in range(bits + 2)]
    one = m.gate("xnor", "clk", "clk")
    zero = m.gate("not", one)
    frame = [zero] + [f"data[{i}]" for i in range(bits)] + [one]
    for i, r in enumerate(regs):
        shifted = regs[i + 1] if i + 1 < len(regs) else one
        hold = m.mux("tick", r, shifted)
        m.dff(m.mux("load", hold, frame[i]), r)
    # bit counter
    cnt = [m.wire("bc") for _ in range(4)]
    carry = "tick"
    for i, q in enumerate(cnt):
        t = m.gate("xor", q, carry)
        m.dff(m.gate("and", t, m.gate("not", "load")), q)
        carry = m.gate("and", carry, q)
    idle = m.gate("and", cnt[3], m.gate("or", cnt[1], cnt[0]))
    m.gate("or", regs[0], idle, out="txd")
    return m.text(f"serial transmitter datapath, {bits} data bits")


def datapath(n):
    m = Netlist(f"npc{n}_netlist")
    m.port("input", "pc", n)
    m.port("input", "imm", n - 2)
    m.port("input", "branch")
    m.port("input", "zero")
    m.port("output", "next_pc", n)
    # pc + 4
    inc = []
    c = None
    for i in range(n):
        if i < 2:
            inc.append(f"pc[{i}]")
        elif i == 2:
            inc.append(m.gate("not", "pc[2]"))
            c = "pc[2]"
        else:
            inc.append(m.gate("xor", f"pc[{i}]", c))
            c = m.gate("and", f"pc[{i}]", c)
    # sign-extended immediate shifted left by 2
    off = []
    for i in range(n):
        if i < 2:
            off.append(m.gate("xor", "pc[0]", "pc[0]"))
        else:
            off.append(f"imm[{min(i - 2, n - 3)}]")
    tgt = []
    c = m.gate("xor", "pc[0]", "pc[0]")
    for i in range(n):
        s, c = m.full_add(inc[i], off[i], c)
        tgt.append(s)
    take = m.gate("and", "branch", "zero")
    for i in range(n):
        m.mux(take, inc[i], tgt[i], out=f"next_pc[{i}]")
    return m.text(f"{n}-bit next-PC logic with branch target adder")


DESIGNS = {
    "adder": [("rca4_netlist", adder(4)), ("rca6_netlist", adder(6))],
    "comparator": [("cmp4_netlist", comparator(4)), ("cmp6_netlist", comparator(6))],
    "shifter": [("lsh4_netlist", shifter(4, 2)), ("lsh8_netlist", shifter(8, 3))],
    "counter": [("cnt4_netlist", counter(4)), ("cnt6_netlist", counter(6))],
    "alu": [("alu2_netlist", alu(2)), ("alu4_netlist", alu(4))],
    "fifo": [("fifo2x2_netlist", fifo(2)), ("fifo2x4_netlist", fifo(4))],
    "uart": [("txshift5_netlist", uart_tx(5)), ("txshift8_netlist", uart_tx(8))],
    "mips_datapath": [("npc6_netlist", datapath(6)), ("npc8_netlist", datapath(8))],
}

if __name__ == "__main__":
    for family, designs in DESIGNS.items():
        out = ROOT / family / "netlist"
        out.mkdir(parents=True, exist_ok=True)
        for name, text in designs:
            (out / f"{name}.v").write_text(text)

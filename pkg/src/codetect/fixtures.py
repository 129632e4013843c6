"""Deterministic fixture corpus for tests and desk-scale runs.

Renders small programs in two contrasting styles: a terse, irregular
"human" style (short names, compact operators, mixed indentation, no blank
lines) and a tidy "generated" style (descriptive names, spaced operators,
blank-line structure, comments). Five generator flavors put small twists on
the generated style so attribution has something to learn; two of them are
deliberately near-identical. Everything is driven by one seed.
"""

from __future__ import annotations

import random
import re

from .samples import CodeSample, content_id

GENERATORS = ("gpt4o", "codellama", "llama31", "codeqwen15", "nxcode")
LANGUAGES = ("python", "java", "cpp")
SOURCES = ("leetcode", "codeforces", "github")

_SHORT_NAMES = ["a", "b", "c", "d", "e", "f", "g", "h", "k", "m", "n", "p",
                "q", "r", "s", "t", "u", "v", "w", "x", "y", "z"]
_LONG_NAMES = ["values", "numbers", "items", "elements", "entries", "records",
               "results", "totals", "scores", "inputs", "weights", "samples"]
_FUNC_NAMES = ["process_values", "compute_total", "aggregate_items",
               "summarize_list", "reduce_numbers", "collect_results"]
_CAMEL_FUNCS = ["processValues", "computeTotal", "aggregateItems",
                "summarizeList", "reduceNumbers", "collectResults"]

_TASKS = ("sum_even", "sum_odd", "product_positive", "max_scan", "count_above")

_TASK_PRED = {
    "sum_even": ("% 2 == 0", "+="),
    "sum_odd": ("% 2 == 1", "+="),
    "product_positive": ("> 0", "*="),
    "max_scan": (None, "max"),
    "count_above": (None, "count"),
}


def _consts(rng: random.Random, count: int = 5) -> list[int]:
    return [rng.randint(1, 97) for _ in range(count)]


# ---------------------------------------------------------------------------
# python renderers


def _python_human(task: str, rng: random.Random) -> str:
    f, arr, acc, i = (rng.choice(_SHORT_NAMES) for _ in range(4))
    while acc == arr:
        acc = rng.choice(_SHORT_NAMES)
    consts = _consts(rng)
    indent = rng.choice([" ", "  ", "\t"])
    pred, op = _TASK_PRED[task]
    lines = [f"def {f}({arr}):"]
    if op == "max":
        lines += [
            f"{indent}{acc}={arr}[0]",
            f"{indent}for {i} in {arr}:",
            f"{indent}{indent}if {i}>{acc}:{acc}={i}",
            f"{indent}return {acc}",
        ]
    elif op == "count":
        limit = rng.randint(5, 40)
        lines += [
            f"{indent}{acc}=0",
            f"{indent}for {i} in {arr}:",
            f"{indent}{indent}if {i}>{limit}:{acc}+=1",
            f"{indent}return {acc}",
        ]
    else:
        start = "1" if op == "*=" else "0"
        cond = pred.replace(" ", "")
        lines += [
            f"{indent}{acc}={start}",
            f"{indent}for {i} in {arr}:",
            f"{indent}{indent}if {i}{cond}:{acc}{op}{i}",
            f"{indent}return {acc}",
        ]
    call = ",".join(str(c) for c in consts)
    lines.append(f"print({f}([{call}]))")
    if rng.random() < 0.4:
        lines.insert(rng.randrange(1, len(lines)), f"{indent}# {rng.choice(['todo', 'fix', 'check', 'tmp'])}")
    return "\n".join(lines) + "\n"


def _python_generated(task: str, rng: random.Random, flavor: str) -> str:
    camel = flavor == "codellama"
    func = rng.choice(_CAMEL_FUNCS if camel else _FUNC_NAMES)
    arr = rng.choice(_LONG_NAMES)
    value = "currentValue" if camel else "value"
    acc = "runningTotal" if camel else "total"
    consts = _consts(rng)
    pred, op = _TASK_PRED[task]
    doc = {
        "sum_even": "Sum the even numbers in the input list.",
        "sum_odd": "Sum the odd numbers in the input list.",
        "product_positive": "Multiply the positive numbers together.",
        "max_scan": "Find the largest number in the list.",
        "count_above": "Count the numbers above the threshold.",
    }[task]
    lines = [f"def {func}({arr}):"]
    if flavor in ("gpt4o", "llama31"):
        lines.append(f'    """{doc}"""')
    if op == "max":
        body = [
            f"    {acc} = {arr}[0]",
            "",
            f"    for {value} in {arr}:",
            f"        if {value} > {acc}:",
            f"            {acc} = {value}",
            "",
            f"    return {acc}",
        ]
    elif op == "count":
        limit = rng.randint(5, 40)
        body = [
            f"    {acc} = 0",
            "",
            f"    for {value} in {arr}:",
            f"        if {value} > {limit}:",
            f"            {acc} += 1",
            "",
            f"    return {acc}",
        ]
    else:
        start = "1" if op == "*=" else "0"
        body = [
            f"    {acc} = {start}",
            "",
            f"    for {value} in {arr}:",
            f"        if {value} {pred}:",
            f"            {acc} {op} {value}",
            "",
            f"    return {acc}",
        ]
    if flavor in ("codeqwen15", "nxcode"):
        body = [line for line in body if line != ""] + [""]
    lines.extend(body)
    lines.append("")
    call = ", ".join(str(c) for c in consts)
    if flavor == "llama31":
        lines += [
            "",
            f"def main():",
            f"    result = {func}([{call}])",
            "    print(result)",
            "",
            "",
            "main()",
        ]
    else:
        result = "finalResult" if camel else "result"
        lines += ["", f"{result} = {func}([{call}])", f"print({result})"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# java renderers


def _java_loop(task: str, acc: str, item: str, arr: str, rng: random.Random,
               tight: bool) -> tuple[str, str, str]:
    pred, op = _TASK_PRED[task]
    if op == "max":
        init = f"{arr}[0]"
        if tight:
            body = f"if({arr}[{item}]>{acc}){acc}={arr}[{item}];"
        else:
            body = f"if ({arr}[{item}] > {acc}) {{ {acc} = {arr}[{item}]; }}"
        return init, body, "int"
    if op == "count":
        limit = rng.randint(5, 40)
        if tight:
            body = f"if({arr}[{item}]>{limit}){acc}++;"
        else:
            body = f"if ({arr}[{item}] > {limit}) {{ {acc}++; }}"
        return "0", body, "int"
    init = "1" if op == "*=" else "0"
    if tight:
        body = f"if({arr}[{item}]{pred.replace(' ', '')}){acc}{op}{arr}[{item}];"
    else:
        body = f"if ({arr}[{item}] {pred}) {{ {acc} {op} {arr}[{item}]; }}"
    return init, body, "int"


def _java_human(task: str, rng: random.Random) -> str:
    cls = rng.choice(["A", "B", "Main", "P", "Sol"])
    f, arr, acc, i = (rng.choice(_SHORT_NAMES) for _ in range(4))
    while acc in (arr, i):
        acc = rng.choice(_SHORT_NAMES)
    while i == arr:
        i = rng.choice(_SHORT_NAMES)
    consts = _consts(rng)
    init, body, kind = _java_loop(task, acc, i, arr, rng, tight=True)
    values = ",".join(str(c) for c in consts)
    return (
        f"public class {cls}{{\n"
        f"static {kind} {f}(int[]{arr}){{\n"
        f"{kind} {acc}={init};\n"
        f"for(int {i}=0;{i}<{arr}.length;{i}++){{{body}}}\n"
        f"return {acc};}}\n"
        f"public static void main(String[]z){{\n"
        f"System.out.println({f}(new int[]{{{values}}}));}}\n"
        f"}}\n"
    )


def _java_generated(task: str, rng: random.Random, flavor: str) -> str:
    func = rng.choice(_CAMEL_FUNCS)
    arr = rng.choice(_LONG_NAMES)
    acc = "runningTotal" if flavor == "codellama" else "total"
    item = "index"
    consts = _consts(rng)
    init, body, kind = _java_loop(task, acc, item, arr, rng, tight=False)
    values = ", ".join(str(c) for c in consts)
    comment = "    // Iterate over the input and accumulate the result.\n" \
        if flavor in ("gpt4o", "llama31") else ""
    blank = "\n" if flavor != "codeqwen15" else ""
    lines = (
        "public class Solution {\n"
        "\n"
        f"    public static {kind} {func}(int[] {arr}) {{\n"
        f"        {kind} {acc} = {init};\n"
        f"{blank}"
        f"{comment}"
        f"        for (int {item} = 0; {item} < {arr}.length; {item}++) {{\n"
        f"            {body}\n"
        "        }\n"
        f"{blank}"
        f"        return {acc};\n"
        "    }\n"
        "\n"
        "    public static void main(String[] args) {\n"
        f"        int[] {arr} = new int[] {{{values}}};\n"
        f"        System.out.println({func}({arr}));\n"
        "    }\n"
        "}\n"
    )
    return lines


# ---------------------------------------------------------------------------
# cpp renderers


def _cpp_human(task: str, rng: random.Random) -> str:
    f, acc, i = (rng.choice(_SHORT_NAMES) for _ in range(3))
    while acc == i:
        acc = rng.choice(_SHORT_NAMES)
    arr = rng.choice(["v", "a", "arr", "xs"])
    consts = _consts(rng)
    pred, op = _TASK_PRED[task]
    if op == "max":
        init, line = f"{arr}[0]", f"if({arr}[{i}]>{acc}){acc}={arr}[{i}];"
    elif op == "count":
        limit = rng.randint(5, 40)
        init, line = "0", f"if({arr}[{i}]>{limit}){acc}++;"
    else:
        init = "1" if op == "*=" else "0"
        line = f"if({arr}[{i}]{pred.replace(' ', '')}){acc}{op}{arr}[{i}];"
    values = ",".join(str(c) for c in consts)
    return (
        "#include <bits/stdc++.h>\n"
        "using namespace std;\n"
        f"int {f}(vector<int>&{arr}){{\n"
        f"int {acc}={init};\n"
        f"for(int {i}=0;{i}<(int){arr}.size();{i}++){{{line}}}\n"
        f"return {acc};}}\n"
        "int main(){\n"
        f"vector<int> {arr}={{{values}}};\n"
        f"cout<<{f}({arr})<<endl;\n"
        "return 0;}\n"
    )


def _cpp_generated(task: str, rng: random.Random, flavor: str) -> str:
    func = rng.choice(_CAMEL_FUNCS)
    arr = rng.choice(_LONG_NAMES)
    acc = "runningTotal" if flavor == "codellama" else "total"
    consts = _consts(rng)
    pred, op = _TASK_PRED[task]
    if op == "max":
        init = f"{arr}[0]"
        inner = (f"        if ({arr}[index] > {acc}) {{\n"
                 f"            {acc} = {arr}[index];\n        }}")
    elif op == "count":
        limit = rng.randint(5, 40)
        init = "0"
        inner = (f"        if ({arr}[index] > {limit}) {{\n"
                 f"            {acc}++;\n        }}")
    else:
        init = "1" if op == "*=" else "0"
        inner = (f"        if ({arr}[index] {pred}) {{\n"
                 f"            {acc} {op} {arr}[index];\n        }}")
    values = ", ".join(str(c) for c in consts)
    comment = "    // Accumulate the result over the input values.\n" \
        if flavor in ("gpt4o", "llama31") else ""
    blank = "\n" if flavor != "codeqwen15" else ""
    return (
        "#include <iostream>\n"
        "#include <vector>\n"
        "\n"
        f"int {func}(const std::vector<int>& {arr}) {{\n"
        f"    int {acc} = {init};\n"
        f"{blank}"
        f"{comment}"
        f"    for (std::size_t index = 0; index < {arr}.size(); index++) {{\n"
        f"{inner}\n"
        "    }\n"
        f"{blank}"
        f"    return {acc};\n"
        "}\n"
        "\n"
        "int main() {\n"
        f"    std::vector<int> {arr} = {{{values}}};\n"
        f"    std::cout << {func}({arr}) << std::endl;\n"
        "    return 0;\n"
        "}\n"
    )


_HUMAN = {"python": _python_human, "java": _java_human, "cpp": _cpp_human}
_GENERATED = {"python": _python_generated, "java": _java_generated,
              "cpp": _cpp_generated}


def render(language: str, style: str, task: str, rng: random.Random) -> str:
    if style == "human":
        return _HUMAN[language](task, rng)
    return _GENERATED[language](task, rng, style)


# ---------------------------------------------------------------------------
# corpus assembly


def make_fixture_corpus(
    n: int = 600,
    seed: int = 20240601,
    languages: tuple[str, ...] = LANGUAGES,
) -> list[CodeSample]:
    """Balanced human/llm corpus of ``n`` samples across the languages."""
    rng = random.Random(seed)
    samples = []
    for index in range(n):
        language = languages[index % len(languages)]
        source = SOURCES[(index // len(languages)) % len(SOURCES)]
        task = rng.choice(_TASKS)
        if index % 2 == 0:
            code = render(language, "human", task, rng)
            label, generator = "human", None
        else:
            generator = GENERATORS[(index // 2) % len(GENERATORS)]
            code = render(language, generator, task, rng)
            label = "llm"
        samples.append(CodeSample(
            id=f"fx-{index:05d}-{content_id(code)[:8]}",
            code=code,
            language=language,
            source=source,
            label=label,
            generator=generator,
        ))
    return samples


_COMPACT_SPACING = [
    (" = ", "="), (" + ", "+"), (" - ", "-"), (" * ", "*"), (" % ", "%"),
    (" > ", ">"), (" < ", "<"), (" == ", "=="), (" += ", "+="),
    (" *= ", "*="), (", ", ","),
]
_SHORT_RENAMES = {
    "values": "v", "numbers": "ns", "items": "it", "elements": "el",
    "entries": "en", "records": "rc", "results": "rs", "totals": "tt",
    "scores": "sc", "inputs": "inp", "weights": "w", "samples": "sm",
    "total": "t", "value": "x", "index": "i", "result": "r",
    "runningTotal": "rt", "currentValue": "cv", "finalResult": "fr",
    "processValues": "f", "computeTotal": "g", "aggregateItems": "h",
    "summarizeList": "p", "reduceNumbers": "q", "collectResults": "u",
    "process_values": "f", "compute_total": "g", "aggregate_items": "h",
    "summarize_list": "p", "reduce_numbers": "q", "collect_results": "u",
    "Solution": "S", "args": "a", "main": "m",
}


def _prefix(order: list, fraction: float) -> set:
    return set(order[:round(fraction * len(order))])


def _join_python_if_lines(lines: list[str], fraction: float,
                          join_order: list[int]) -> list[str]:
    sites = []
    for i, line in enumerate(lines):
        m = re.match(r"^(\s*)if .*:$", line)
        if m and i + 1 < len(lines) and lines[i + 1].strip():
            if len(lines[i + 1]) - len(lines[i + 1].lstrip()) > len(m.group(1)):
                sites.append(i)
    chosen = _prefix([s for s in join_order if s in sites], fraction)
    out, i = [], 0
    while i < len(lines):
        if i in chosen:
            out.append(lines[i] + lines[i + 1].strip())
            i += 2
            continue
        out.append(lines[i])
        i += 1
    return out


def _join_brace_blocks(lines: list[str], fraction: float) -> list[str]:
    for _ in range(3):
        sites = [i for i in range(len(lines) - 2)
                 if lines[i].rstrip().endswith("{") and lines[i + 1].strip()
                 and "{" not in lines[i + 1] and lines[i + 2].strip() == "}"]
        chosen = _prefix(sites, fraction)
        if not chosen:
            break
        out, i = [], 0
        while i < len(lines):
            if i in chosen and i + 2 < len(lines):
                out.append(lines[i].rstrip() + lines[i + 1].strip() + "}")
                i += 3
                continue
            out.append(lines[i])
            i += 1
        lines = out
    return lines


def humanize(code: str, language: str, fraction: float, orders: dict) -> str:
    """Rewrite ``fraction`` of a generated rendering into the human style.

    Transform sites are taken as prefixes of fixed per-base permutations, so
    the variant at a higher fraction is a superset rewrite of the variant at
    a lower one. That keeps per-sample trajectories monotone, which is what
    a degradation curve needs from its instrument.
    """
    lines = code.split("\n")
    if language == "python":
        lines = _join_python_if_lines(lines, fraction, orders["join"])
    else:
        lines = _join_brace_blocks(lines, fraction)
    blanks = [i for i, l in enumerate(lines) if not l.strip()]
    nonblank = [i for i, l in enumerate(lines) if l.strip()]
    drop = _prefix(blanks, fraction)
    compact = _prefix(nonblank, fraction)
    out = []
    for i, line in enumerate(lines):
        if i in drop:
            continue
        if i in compact:
            for wide, tight in _COMPACT_SPACING:
                line = line.replace(wide, tight)
        out.append(line)
    code = "\n".join(out)
    unit = 4 - round(3 * fraction)
    if unit < 4:
        def reindent(match):
            return " " * (unit * (len(match.group(0)) // 4))

        code = "\n".join(re.sub(r"^(?:    )+", reindent, line)
                         for line in code.split("\n"))
    for name in sorted(_prefix(orders["names"], fraction), key=len, reverse=True):
        code = re.sub(rf"\b{name}\b", _SHORT_RENAMES[name], code)
    return code


def make_hybrid_fixtures(n: int = 550, seed: int = 20240602) -> list[CodeSample]:
    """Hybrid samples annotated with the preserved-human-style fraction.

    Every base rendering appears at eleven fractions (0.0 to 1.0 in tenths)
    with nested rewrites, so per-decile accuracy over these fixtures is a
    survival curve rather than a comparison of unrelated samples.
    """
    rng = random.Random(seed)
    bases = -(-n // 11)
    samples = []
    for b in range(bases):
        language = LANGUAGES[b % len(LANGUAGES)]
        task = rng.choice(_TASKS)
        generator = GENERATORS[b % len(GENERATORS)]
        base = render(language, generator, task, rng)
        join_order = list(range(len(base.split("\n"))))
        rng.shuffle(join_order)
        name_order = sorted(_SHORT_RENAMES)
        rng.shuffle(name_order)
        orders = {"join": join_order, "names": name_order}
        for tick in range(11):
            fraction = tick / 10.0
            code = humanize(base, language, fraction, orders)
            samples.append(CodeSample(
                id=f"hy-{b:04d}-{tick:02d}-{content_id(code)[:8]}",
                code=code,
                language=language,
                source="github",
                label="hybrid",
                generator=generator,
                human_fraction=fraction,
            ))
    return samples[:max(n, 0)]

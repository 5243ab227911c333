import sys

from colorama import Fore, Style, init

init(autoreset=True)

# ---------------------------------------------------------
# STATUS COLOR PALETTE
# ---------------------------------------------------------
STATUS_COLORS = {
    "pass": Fore.GREEN,
    "fail": Fore.RED,
    "inconclusive": Fore.YELLOW,
}

DEFAULT_COLOR = Fore.WHITE
FRAME_COLOR = Fore.CYAN

_enabled = True


def set_color(enabled):
    global _enabled
    _enabled = bool(enabled)


def _paint(color, text):
    return color + text + Style.RESET_ALL if _enabled else text


def _emit(line=""):
    print(line, file=sys.stderr)


def banner(title):
    _emit(_paint(FRAME_COLOR, "=" * 50))
    _emit(_paint(FRAME_COLOR, f"  {title}"))
    _emit(_paint(FRAME_COLOR, "=" * 50))


def status_line(status, message):
    color = STATUS_COLORS.get(status, DEFAULT_COLOR)
    _emit(_paint(color, f"[{status.upper():^12}]") + f" {message}")


# ---------------------------------------------------------
# COMMAND SUMMARIES
# ---------------------------------------------------------
def render_validation(report):
    banner("Model validation")
    _emit(f"  realizable supports: {report['realizable_supports']}")
    if report["empty"]:
        status_line("fail", "level set is empty")
    elif report["regular"]:
        status_line("pass", "level is regular")
    else:
        for item in report["offending"]:
            support = "{" + ",".join(str(j) for j in item["support"]) + "}"
            status_line("fail", f"{support} has stabiliser {item['group']['label']}")


def render_strata(strata, row):
    banner(f"Strata of row {row}")
    if not strata:
        status_line("pass", "circle acts freely")
    for s in strata:
        support = "{" + ",".join(str(j) for j in s["fixed_support"]) + "}"
        tag = "" if s["realizable"] else " (not realizable)"
        _emit(f"  Z{s['order']} fixing {support}{tag}")


def render_singular(entries):
    banner("Orbifold singular supports")
    if not entries:
        status_line("pass", "quotient is smooth")
    for item in entries:
        support = "{" + ",".join(str(j) for j in item["support"]) + "}"
        _emit(f"  {support}: {item['group']['label']}")


def render_certificate(certificate):
    banner("Resolution certificate")
    for i, step in enumerate(certificate["steps"], start=1):
        support = "{" + ",".join(str(j) for j in step["stratum"]["fixed_support"]) + "}"
        if step["kind"] == "surgery":
            _emit(f"  {i}. row {step['row']}: Z{step['m']} on {support}, "
                  f"eps={step['epsilon']} delta={step['delta']} level={step['new_level']}")
        else:
            _emit(f"  {i}. row {step['row']}: Z{step['m']} fixes everything, reparametrised")
    left = certificate["summaries"][-1]
    status_line("fail" if left else "pass",
                f"{len(certificate['steps'])} step(s), {len(left)} singular support(s) left")


def render_cut(cut):
    banner(f"Cut {cut['side']} at {cut['cut_value']}")
    for item in cut["hypersurface_singularities"]:
        support = "{" + ",".join(str(j) for j in item["support"]) + "}"
        _emit(f"  hypersurface singularity {support}: {item['group']['label']}")
    if not cut["hypersurface_singularities"]:
        status_line("pass", "cut is smooth")


def render_report(report):
    banner("Verification")
    for check in report["checks"]:
        status_line(check["status"], f"{check['check']} ({check['formula']}) "
                                     f"max={check['max_residual']} samples={check['samples']}")
    status_line(report["status"], "overall")


def render_error(message):
    _emit(_paint(Fore.RED, "error: ") + message)

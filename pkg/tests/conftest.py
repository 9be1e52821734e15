import pathlib
import sys

SRC = pathlib.Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))


def pytest_report_header(config):
    from diffauction import KERNEL_BACKEND
    return f"diffauction kernel backend: {KERNEL_BACKEND}"

from spack.package import *


class Unstable(Package):
    """Deliberately flaky demo package used to exercise failure handling."""

    version("0.1", sha256="0000000000000000000000000000000000000000000000000000000000000005")

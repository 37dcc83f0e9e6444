from spack.package import *


class Starpu(AutotoolsPackage):
    """Task-based runtime system for heterogeneous multicore machines."""

    homepage = "https://starpu.gitlabpages.inria.fr"
    url = "https://files.inria.fr/starpu/starpu-1.3.9/starpu-1.3.9.tar.gz"

    version("1.3.9", sha256="0000000000000000000000000000000000000000000000000000000000000002")

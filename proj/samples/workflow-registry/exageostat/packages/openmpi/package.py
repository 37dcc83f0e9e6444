from spack.package import *


class Openmpi(AutotoolsPackage):
    """Open MPI message passing library."""

    homepage = "https://www.open-mpi.org"
    url = "https://download.open-mpi.org/release/open-mpi/v4.1/openmpi-4.1.4.tar.bz2"

    version("4", sha256="0000000000000000000000000000000000000000000000000000000000000003")

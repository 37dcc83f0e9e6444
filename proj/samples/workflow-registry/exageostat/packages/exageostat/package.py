from spack.package import *


class Exageostat(CMakePackage):
    """Machine learning and prediction toolkit for geospatial statistics."""

    homepage = "https://github.com/ecrc/exageostat"
    url = "https://github.com/ecrc/exageostat/archive/v1.1.0.tar.gz"

    version("1.1.0", sha256="0000000000000000000000000000000000000000000000000000000000000000")

    variant("mpi", default=False, description="Enable distributed-memory support")

    depends_on("gsl")
    depends_on("starpu")
    depends_on("mpi", when="+mpi")

    def cmake_args(self):
        return [self.define_from_variant("EXAGEOSTAT_USE_MPI", "mpi")]

from spack.package import *


class Gsl(AutotoolsPackage, GNUMirrorPackage):
    """GNU Scientific Library: numerical routines for C and C++."""

    homepage = "https://www.gnu.org/software/gsl"
    gnu_mirror_path = "gsl/gsl-2.7.1.tar.gz"

    version("2.7.1", sha256="0000000000000000000000000000000000000000000000000000000000000001")

class ExitStatus:
    SUCCESS = 0
    USAGE = 2
    DEGENERATE = 3
    NUMERICAL = 4


class BoxCoxSegError(Exception):
    """Base class for every error raised deliberately by boxcoxseg"""
    exit_status = ExitStatus.USAGE


class RasterError(BoxCoxSegError, IOError):
    """A raster or output file could not be read, decoded, mapped or written"""
    exit_status = ExitStatus.USAGE


class DegenerateDataError(BoxCoxSegError, ValueError):
    """The data carries no information for the requested computation (constant image, single class, ...)"""
    exit_status = ExitStatus.DEGENERATE


class NumericalError(BoxCoxSegError, ArithmeticError):
    """A computation left its admissible domain or produced non-finite values"""
    exit_status = ExitStatus.NUMERICAL


def exit_status_for(error: Exception) -> int:
    """Maps an exception raised during a command to the documented process exit status

    :param error: the exception that stopped the command
    :return: the exit status the CLI should terminate with
    """
    if isinstance(error, BoxCoxSegError):
        return error.exit_status
    if isinstance(error, (ValueError, OSError)):
        return ExitStatus.USAGE
    return ExitStatus.NUMERICAL

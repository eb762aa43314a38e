import numpy as np

GRAY_WEIGHTS = (0.299, 0.587, 0.114)


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    """Copies the given array into a read-only array of the given dtype"""
    frozen = np.array(array, dtype=dtype, copy=True)
    frozen.setflags(write=False)
    return frozen


class RgbImage(object):
    """An 8-bit colour raster held as a (height, width, 3) array of doubles in [0, 255]"""

    def __init__(self, pixels: np.ndarray):
        pixels = np.asarray(pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError("an RGB image needs a (height, width, 3) array, got shape {0}".format(pixels.shape))
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError("an RGB image needs at least one pixel, got shape {0}".format(pixels.shape))
        if not np.all(np.isfinite(pixels)) or pixels.min() < 0 or pixels.max() > 255:
            raise ValueError("RGB channel values must lie in [0, 255]")
        self.pixels = _frozen(pixels, np.float64)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple:
        return self.pixels.shape[:2]


class GrayImage(object):
    """A single channel raster of finite nonnegative real intensities"""

    def __init__(self, pixels: np.ndarray):
        pixels = np.asarray(pixels)
        if pixels.ndim != 2 or pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError("a gray image needs a non-empty (height, width) array, got shape {0}".format(
                pixels.shape))
        if not np.all(np.isfinite(pixels)):
            raise ValueError("gray intensities must be finite")
        if pixels.min() < 0:
            raise ValueError("gray intensities must be nonnegative, found {0}".format(pixels.min()))
        self.pixels = _frozen(pixels, np.float64)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple:
        return self.pixels.shape

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


class IntensityVector(object):
    """Row-major flattening of a gray image that remembers the shape it came from"""

    def __init__(self, values: np.ndarray, origin_shape: tuple):
        values = np.asarray(values, dtype=np.float64).ravel()
        origin_shape = tuple(int(size) for size in origin_shape)
        if len(origin_shape) != 2 or values.size != origin_shape[0] * origin_shape[1]:
            raise ValueError("{0} values cannot come from an image of shape {1}".format(values.size, origin_shape))
        if not np.all(np.isfinite(values)):
            raise ValueError("intensity vector values must be finite")
        self.values = _frozen(values, np.float64)
        self.origin_shape = origin_shape

    def __len__(self):
        return self.values.size

    def with_values(self, values: np.ndarray):
        """Builds a vector over the same image shape holding new values

        :param values: the n replacement values
        :return: a new IntensityVector
        """
        return IntensityVector(values, self.origin_shape)


class Palette(object):
    """An explicit mapping from raster pixel values to class labels

    Gray rasters are keyed by integers, colour rasters by (r, g, b) tuples. Several pixel values may map
    to one class; the first value registered for a class is the one written back on export.
    """

    def __init__(self, entries: list, class_names: list = None):
        if not entries:
            raise ValueError("a palette needs at least one entry")
        self.entries = [(self._normalize_key(key), int(label)) for key, label in entries]
        kinds = {isinstance(key, tuple) for key, _ in self.entries}
        if len(kinds) != 1:
            raise ValueError("a palette cannot mix gray and colour values")
        self.is_color = kinds.pop()
        keys = [key for key, _ in self.entries]
        if len(set(keys)) != len(keys):
            raise ValueError("palette values must be unique, got {0}".format(keys))
        labels = sorted({label for _, label in self.entries})
        if labels != list(range(len(labels))):
            raise ValueError("palette labels must be 0..K-1, got {0}".format(labels))
        self.num_classes = len(labels)
        if class_names is not None and len(class_names) != self.num_classes:
            raise ValueError("{0} class names given for {1} classes".format(len(class_names), self.num_classes))
        self.class_names = list(class_names) if class_names is not None else None

    @staticmethod
    def _normalize_key(key):
        if isinstance(key, str):
            key = key.strip()
            if key.startswith("#") and len(key) == 7:
                return tuple(int(key[i:i + 2], 16) for i in (1, 3, 5))
            return int(key)
        if isinstance(key, (tuple, list)):
            if len(key) != 3:
                raise ValueError("colour palette values need three channels, got {0}".format(key))
            return tuple(int(channel) for channel in key)
        return int(key)

    @staticmethod
    def packed(key) -> int:
        """Packs a palette key into the integer used to match raster pixels"""
        if isinstance(key, tuple):
            return (key[0] << 16) | (key[1] << 8) | key[2]
        return key

    @classmethod
    def from_string(cls, text: str):
        """Parses the textual palette form used on the command line and in run configs

        Classes are separated by ';', each written as values=name where values are gray levels or
        #rrggbb colours joined by '|'. Class labels follow the order classes are written in, e.g.
        "#000000|#00ff00=surface;#0000ff=rock;#ff0000=sky".

        :param text: the palette description
        :return: the parsed Palette
        """
        entries, names = [], []
        for label, chunk in enumerate(part for part in text.split(";") if part.strip()):
            if "=" not in chunk:
                raise ValueError("palette class {0} is not written as values=name".format(chunk))
            values, name = chunk.rsplit("=", 1)
            names.append(name.strip())
            for value in values.split("|"):
                entries.append((value, label))
        return cls(entries, names)

    def to_string(self) -> str:
        """Writes the palette back in the form accepted by from_string"""
        chunks = []
        for label in range(self.num_classes):
            values = [self._key_string(key) for key, entry_label in self.entries if entry_label == label]
            name = self.class_names[label] if self.class_names else str(label)
            chunks.append("{0}={1}".format("|".join(values), name))
        return ";".join(chunks)

    @staticmethod
    def _key_string(key) -> str:
        if isinstance(key, tuple):
            return "#{0:02x}{1:02x}{2:02x}".format(*key)
        return str(key)

    def export_value(self, label: int):
        """Retrieves the pixel value written for the given class label"""
        for key, entry_label in self.entries:
            if entry_label == label:
                return key
        raise ValueError("label {0} is not in the palette".format(label))


class LabelMask(object):
    """Per pixel class labels in {0, ..., K-1}"""

    def __init__(self, labels: np.ndarray, num_classes: int, class_names: list = None):
        labels = np.asarray(labels)
        if labels.ndim != 2 or labels.shape[0] < 1 or labels.shape[1] < 1:
            raise ValueError("a label mask needs a non-empty (height, width) array, got shape {0}".format(
                labels.shape))
        if num_classes < 1:
            raise ValueError("a label mask needs at least one class")
        if labels.min() < 0 or labels.max() >= num_classes:
            raise ValueError("mask labels must lie in [0, {0})".format(num_classes))
        if class_names is not None and len(class_names) != num_classes:
            raise ValueError("{0} class names given for {1} classes".format(len(class_names), num_classes))
        self.labels = _frozen(labels, np.int64)
        self.num_classes = int(num_classes)
        self.class_names = list(class_names) if class_names is not None else None

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def shape(self) -> tuple:
        return self.labels.shape

    def names(self) -> list:
        """Retrieves the class names, falling back to the label numbers"""
        if self.class_names:
            return list(self.class_names)
        return [str(label) for label in range(self.num_classes)]


def to_gray(img: RgbImage) -> GrayImage:
    """Converts an RGB image to luminance with the 0.299/0.587/0.114 weights, kept in floating point

    :param img: the colour image
    :return: the gray image
    """
    pixels = img.pixels
    gray = GRAY_WEIGHTS[0] * pixels[:, :, 0] + GRAY_WEIGHTS[1] * pixels[:, :, 1] + GRAY_WEIGHTS[2] * pixels[:, :, 2]
    # weights sum to 1 up to rounding, keep white at 255
    return GrayImage(np.clip(gray, 0.0, 255.0))


def vectorize(img: GrayImage) -> IntensityVector:
    """Flattens a gray image row by row

    :param img: the gray image
    :return: the length U*V intensity vector
    """
    return IntensityVector(img.pixels.ravel(order="C"), img.shape)


def unvectorize(v: IntensityVector) -> GrayImage:
    """Reshapes an intensity vector back into the image it was flattened from"""
    return GrayImage(v.values.reshape(v.origin_shape, order="C"))

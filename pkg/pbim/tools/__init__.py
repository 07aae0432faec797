from .dataset import Dataset, ImageLoader, list_images, scan_dataset
from .netpbm import write_pbm, write_pgm

from .duration import format_duration
from .utils import JsonEncoder, decode_complex_array, encode_complex, encode_complex_array, format_value, generate_uuid

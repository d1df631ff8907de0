"""Feed codecs (EQB-1 binary, FDF-1/TTF-1 CSV) and book reconstruction."""
from .book import BookDelta, DeltaColumns, LimitOrderBook, apply_to_book, build_book
from .eqb import (
    ASK,
    BID,
    AddOrder,
    EquityMessage,
    HiddenTrade,
    OrderCancel,
    OrderDelete,
    OrderExecuted,
    OrderReplace,
    decode,
    decode_all,
    encode,
    encode_all,
    iter_messages,
)
from .text import (
    FuturesTrade,
    TapeTrade,
    parse_futures_feed,
    parse_trade_tape,
    write_futures_feed,
    write_trade_tape,
)

decode_equity_message = decode

__all__ = [
    "ASK", "BID", "AddOrder", "BookDelta", "DeltaColumns", "EquityMessage", "FuturesTrade",
    "HiddenTrade", "LimitOrderBook", "OrderCancel", "OrderDelete", "OrderExecuted",
    "OrderReplace", "TapeTrade", "apply_to_book", "build_book", "decode", "decode_all",
    "decode_equity_message", "encode", "encode_all", "iter_messages", "parse_futures_feed",
    "parse_trade_tape", "write_futures_feed", "write_trade_tape",
]

//! Java tokenization and vocabulary construction.

mod tokenizer;
mod vocab;

pub use tokenizer::{
    detokenize, tokenize, tokenize_lenient, tokenize_with, LexError, LexMode, LexWarning, Token, TokenKind,
    TokenStream, MAX_TOKEN_CHARS, NUM_TOKEN,
};
pub use vocab::{
    build_vocabulary, TokenCounts, VocabError, Vocabulary, ADD, ADD_ID, DEFAULT_MAX_SIZE, DEFAULT_MIN_COUNT,
    DEL, DEL_ID, NUM_ID, PAD, PAD_ID, SEP, SEP_ID, SPECIALS, UNK, UNK_ID,
};

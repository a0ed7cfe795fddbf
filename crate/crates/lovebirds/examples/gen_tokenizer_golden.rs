//! One-off generator for the tokenizer golden fixture.

use lovebirds::corpus::tokenize;

fn main() {
    let inputs: Vec<String> = build_inputs();
    assert_eq!(inputs.len(), 100);
    for input in &inputs {
        let tokens = tokenize(input);
        println!("{}\t{}", input, tokens.join("\u{1F}"));
    }
}

fn build_inputs() -> Vec<String> {
    let fixed: Vec<&str> = vec![
        "Good night 😘😘",
        "@User1 hi!!",
        "love you so much 💓 @a",
        "darling i love you so much 💓",
        "good night baby love you 😘",
        "LOVE #MondayVibes https://t.co/xyz",
        "what?!?really",
        "hey!!@ben",
        "cc @a_b9 ok",
        "love ❤️ you",
        "i can't even",
        "don't stop believing",
        "3 cats, 2 dogs.",
        "pi is 3.14 ok",
        "#tbt to 2019!!",
        "RT @news: big story",
        "u ok hun?",
        "meet me @ the park",
        "email me at a@b.com",
        "100% done",
        "so...many...dots",
        "wait -- what",
        "(parentheses) [brackets] {braces}",
        "quote \"this\" please",
        "semi;colon:test",
        "slash/and\\backslash",
        "a+b=c",
        "~tilde~ and ^caret^",
        "star * power",
        "under_score_word",
        "MiXeD CaSe TeXt",
        "émojis and café",
        "naïve résumé",
        "日本語のツイート",
        "mixed 日本語 and english",
        "😀 starts the tweet",
        "ends with emoji 🌙",
        "🔥🔥🔥 fire",
        "💔 broke up",
        "heart suit ♥ old school",
        "⭐ star block",
        "☀ sunshine ☂ rain",
        "@mention1 @mention2 double",
        "#one #two #three",
        "http://plain.example",
        "https://secure.example/path?q=1",
        "see https://a.b and more",
        "@user: greeting",
        "@@weird",
        "#",
        "@",
        "#123start",
        "plain",
        "  leading spaces",
        "trailing spaces  ",
        "many-dashed-words split",
        "newline one",
        "ALLCAPS SHOUTING",
        "lol!!!1!one",
        "y'all ready",
        "it's o'clock somewhere",
        "rock'n'roll",
        "she said 'hi'",
        "ain't nothin'",
        "test@handle not an email start",
        "12345",
        "007 agent",
        "v2.0 release",
        "one,two,three",
        "end.",
        "...",
        "?!",
        "a b c d e",
        "supercalifragilisticexpialidocious",
        "short",
        "xo xo 😘",
        "miss u 💕 sm",
        "good morning ☕ time",
        "gym 💪 then food 🍕",
        "movie night 🎬 w/ friends",
        "new phone 📱 who dis",
        "happy bday 🎂🎉 bestie",
        "road trip 🚗💨",
        "study group 📚 at 7",
        "game day 🏈 lets go",
        "concert was 🔊 amazing",
        "beach day 🏖 soon",
        "rainy mood ☔ today",
        "kitten pics 🐱 please",
        "no mentions here at all",
        "@solo",
        "trailing mention @end",
        "#hashtag only",
        "https://only.url",
        "😍",
        "multi   space   gaps",
        "snake_case and CamelCase",
        "1st 2nd 3rd",
        "final line of the corpus 💖 @friend",
        "brunch pics 🥞 later w @crew #sunday",
    ];
    fixed.iter().map(|s| s.to_string()).collect()
}

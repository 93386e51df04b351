public void parseOnly(String xml) {
    String body = xml.trim();
    log("start");
    xstream.fromXML(body);
    log("done");
}
